#include "mssg/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mssg/parallel.hpp"

namespace mssg {
namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kDisorderStream = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kSampleStream = 0xbb67ae8584caa73bULL;

}  // namespace

std::vector<int> species_sizes(const Eigen::VectorXd& lambda, int N) {
  const int n = static_cast<int>(lambda.size());
  if (N < n) throw ValidationError("mc: N must be at least the number of species");
  std::vector<int> sizes(n);
  std::vector<double> remainder(n);
  int used = 0;
  for (int s = 0; s < n; ++s) {
    const double exact = lambda[s] * N;
    sizes[s] = static_cast<int>(std::floor(exact));
    remainder[s] = exact - sizes[s];
    used += sizes[s];
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int i = 0; used < N; ++i, ++used) ++sizes[order[i % n]];
  for (int s = 0; s < n; ++s) {
    if (sizes[s] > 0) continue;
    const int donor = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    --sizes[donor];
    ++sizes[s];
  }
  return sizes;
}

MixtureModel empirical_model(const MixtureModel& model, const std::vector<int>& sizes) {
  const int N = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<Species> species = model.species();
  for (std::size_t s = 0; s < species.size(); ++s)
    species[s].lambda = static_cast<double>(sizes[s]) / N;
  return MixtureModel(species, model.terms());
}

double RealizedHamiltonian::operator()(const Eigen::VectorXd& sigma) const {
  double total = 0.0;
  std::vector<double> buffer;
  for (const auto& t : tensors_) {
    buffer = t.entries;
    std::size_t size = buffer.size();
    // contract the last remaining axis each round
    for (auto it = t.tuple.rbegin(); it != t.tuple.rend(); ++it) {
      const auto len = static_cast<std::size_t>(sizes_[*it]);
      const double* block = sigma.data() + offsets_[*it];
      const std::size_t outer = size / len;
      for (std::size_t a = 0; a < outer; ++a) {
        double acc = 0.0;
        const double* row = buffer.data() + a * len;
        for (std::size_t b = 0; b < len; ++b) acc += row[b] * block[b];
        buffer[a] = acc;
      }
      size = outer;
    }
    total += t.scale * buffer[0];
  }
  return total;
}

RealizedHamiltonian sample_hamiltonian(const MixtureModel& model, const McConfig& config,
                                       std::uint64_t disorder_seed) {
  if (config.N > 128) throw ValidationError("mc: N above 128 is not supported");
  RealizedHamiltonian H;
  H.N_ = config.N;
  H.sizes_ = species_sizes(model.lambda(), config.N);
  H.offsets_.assign(H.sizes_.size(), 0);
  for (std::size_t s = 1; s < H.sizes_.size(); ++s)
    H.offsets_[s] = H.offsets_[s - 1] + H.sizes_[s - 1];

  std::size_t total_entries = 0;
  for (const auto& term : model.terms()) {
    if (term.p > 4) throw ValidationError("mc: interaction degree above 4 is not supported");
    for (const auto& [tuple, c] : term.coefficients) {
      if (c == 0.0) continue;
      std::size_t count = 1;
      for (int s : tuple) count *= static_cast<std::size_t>(H.sizes_[s]);
      total_entries += count;
    }
  }
  if (total_entries > kMaxTensorEntries)
    throw ValidationError("mc: disorder tensors exceed " + std::to_string(kMaxTensorEntries) +
                          " entries");

  std::mt19937_64 rng(splitmix(disorder_seed ^ kDisorderStream));
  std::normal_distribution<double> gauss;
  for (const auto& term : model.terms()) {
    for (const auto& [tuple, c] : term.coefficients) {
      if (c == 0.0) continue;
      RealizedHamiltonian::Tensor t;
      t.tuple = tuple;
      t.scale = std::sqrt(c) * std::pow(static_cast<double>(config.N), 0.5 * (1 - term.p));
      std::size_t count = 1;
      for (int s : tuple) count *= static_cast<std::size_t>(H.sizes_[s]);
      t.entries.resize(count);
      for (auto& e : t.entries) e = gauss(rng);
      H.tensors_.push_back(std::move(t));
    }
  }
  return H;
}

Eigen::VectorXd sample_configuration(const std::vector<int>& sizes, std::uint64_t seed,
                                     std::uint64_t index) {
  std::mt19937_64 rng(splitmix(splitmix(seed ^ kSampleStream) + index));
  std::normal_distribution<double> gauss;
  const int N = std::accumulate(sizes.begin(), sizes.end(), 0);
  Eigen::VectorXd sigma(N);
  int offset = 0;
  for (int len : sizes) {
    auto block = sigma.segment(offset, len);
    for (int i = 0; i < len; ++i) block[i] = gauss(rng);
    block *= std::sqrt(static_cast<double>(len)) / block.norm();
    offset += len;
  }
  return sigma;
}

double sphere_field_term(double h, int n) {
  if (n < 1) throw std::invalid_argument("sphere dimension must be positive");
  if (h == 0.0) return 0.0;
  const double a = std::abs(h) * n;
  if (n == 1) return (a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0)) / n;
  // <sigma, 1> = n cos(phi) with density proportional to sin^{n-2}(phi) on [0, pi]
  const int intervals = 20000;
  const double step = M_PI / intervals;
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double phi = i * step;
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double base = n == 2 ? 1.0 : std::pow(std::sin(phi), n - 2);
    num += w * base * std::exp(a * (std::cos(phi) - 1.0));
    den += w * base;
  }
  return (a + std::log(num / den)) / n;
}

McEstimate estimate_F(const MixtureModel& model, const McConfig& config) {
  if (config.samples < 1) throw ValidationError("mc: sample count must be positive");
  if (config.batches < 2 || config.batches > config.samples)
    throw ValidationError("mc: batch count must lie in [2, samples]");

  const RealizedHamiltonian H = sample_hamiltonian(model, config, config.seed);
  const auto& sizes = H.sizes();
  const int n = model.num_species();
  std::vector<int> offsets(n, 0);
  for (int s = 1; s < n; ++s) offsets[s] = offsets[s - 1] + sizes[s - 1];

  const auto M = static_cast<std::size_t>(config.samples);
  std::vector<double> logw(M);
  const std::size_t chunk = 1024;
  const std::size_t chunks = (M + chunk - 1) / chunk;
  parallel_for(chunks, worker_count(config.threads), [&](std::size_t c) {
    for (std::size_t i = c * chunk; i < std::min(M, (c + 1) * chunk); ++i) {
      const Eigen::VectorXd sigma = sample_configuration(sizes, config.seed, i);
      double w = H(sigma);
      for (int s = 0; s < n; ++s)
        w += model.field()[s] * sigma.segment(offsets[s], sizes[s]).sum();
      logw[i] = w;
    }
  });

  // per-batch log-sum-exp, then leave-one-batch-out estimates
  const int B = config.batches;
  std::vector<double> batch_max(B, -std::numeric_limits<double>::infinity());
  std::vector<double> batch_sum(B, 0.0);
  std::vector<std::size_t> batch_count(B, 0);
  auto batch_of = [&](std::size_t i) { return static_cast<int>(i * B / M); };
  for (std::size_t i = 0; i < M; ++i) {
    const int b = batch_of(i);
    batch_max[b] = std::max(batch_max[b], logw[i]);
    ++batch_count[b];
  }
  for (std::size_t i = 0; i < M; ++i) {
    const int b = batch_of(i);
    batch_sum[b] += std::exp(logw[i] - batch_max[b]);
  }
  auto combine = [&](int skip) {
    double top = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (int b = 0; b < B; ++b)
      if (b != skip) {
        top = std::max(top, batch_max[b]);
        count += batch_count[b];
      }
    double sum = 0.0;
    for (int b = 0; b < B; ++b)
      if (b != skip) sum += batch_sum[b] * std::exp(batch_max[b] - top);
    return (top + std::log(sum) - std::log(static_cast<double>(count))) / config.N;
  };

  McEstimate out;
  out.F = combine(-1);
  std::vector<double> loo(B);
  for (int b = 0; b < B; ++b) loo[b] = combine(b);
  const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / B;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  out.standard_error = std::sqrt((B - 1.0) / B * ss);

  out.sizes = sizes;
  const MixtureModel emp = empirical_model(model, sizes);
  out.lambda_hat = emp.lambda();
  for (int s = 0; s < n; ++s)
    out.field_reference += sizes[s] * sphere_field_term(model.field()[s], sizes[s]) / config.N;
  out.annealed_reference = 0.5 * emp.xi(Eigen::VectorXd::Ones(n)) + out.field_reference;
  return out;
}

}  // namespace mssg
