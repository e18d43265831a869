#include "tinygroups/pow.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "tinygroups/hashing.hpp"

namespace tinygroups {

double calibrate_tau(uint64_t epoch_steps, double attempts_per_unit_step) {
  if (epoch_steps == 0 || !(attempts_per_unit_step > 0.0)) {
    throw std::invalid_argument("tau calibration needs positive T and rate");
  }
  double tau = 2.0 / (attempts_per_unit_step * static_cast<double>(epoch_steps));
  if (tau >= 1.0) throw std::invalid_argument("tau >= 1: epoch too short for the rate");
  return tau;
}

size_t sigma_bits_for(double ell, size_t n) {
  if (!(ell > 0.0) || n < 3) throw std::invalid_argument("bad sigma length parameters");
  double bits = ell * std::log(static_cast<double>(n));
  size_t b = static_cast<size_t>(std::ceil(bits));
  return (b + 7) / 8 * 8;
}

std::string epoch_string_ref(std::span<const uint8_t> r) {
  auto digest = sha256(r);
  return to_hex(std::span<const uint8_t>(digest.data(), 8));
}

namespace {

std::vector<uint8_t> xor_bytes(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  std::vector<uint8_t> out(std::max(a.size(), b.size()), 0);
  for (size_t i = 0; i < a.size(); ++i) out[i] ^= a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] ^= b[i];
  return out;
}

std::vector<uint8_t> random_sigma(size_t bits, Rng& rng) {
  std::vector<uint8_t> sigma(bits / 8);
  for (auto& byte : sigma) byte = static_cast<uint8_t>(rng.next() & 0xff);
  return sigma;
}

// Truncates the puzzle input itself to a ring point. Only reachable in
// the single-hash ablation, where the input-biasing attack works.
IdPoint input_as_id(std::span<const uint8_t> x) {
  uint64_t v = 0;
  for (size_t i = 0; i < 8; ++i) v = (v << 8) | (i < x.size() ? x[i] : 0);
  return IdPoint{v};
}

}  // namespace

uint64_t puzzle_output_units(std::span<const uint8_t> sigma, std::span<const uint8_t> r) {
  return hash64("pow-g", xor_bytes(sigma, r));
}

IdPoint id_from_solution(std::span<const uint8_t> sigma, std::span<const uint8_t> r,
                         const PuzzleParams& params) {
  if (params.single_hash_ablation) return input_as_id(xor_bytes(sigma, r));
  uint64_t g = puzzle_output_units(sigma, r);
  return IdPoint{hash64_words("pow-f", {g})};
}

std::optional<IdCertificate> attempt_generate(std::span<const uint8_t> r_prev,
                                              uint64_t steps, const PuzzleParams& params,
                                              uint64_t epoch_valid, uint64_t owner, Rng& rng) {
  uint64_t attempts = static_cast<uint64_t>(
      static_cast<double>(steps) * params.attempts_per_unit_step);
  uint64_t tau_units = static_cast<uint64_t>(params.tau * 0x1.0p64);
  for (uint64_t a = 0; a < attempts; ++a) {
    std::vector<uint8_t> sigma = random_sigma(params.sigma_bits, rng);
    if (puzzle_output_units(sigma, r_prev) <= tau_units) {
      IdCertificate cert;
      cert.sigma = std::move(sigma);
      cert.epoch_string_ref = epoch_string_ref(r_prev);
      cert.id_value = id_from_solution(cert.sigma, r_prev, params);
      cert.epoch_valid = epoch_valid;
      cert.owner = owner;
      return cert;
    }
  }
  return std::nullopt;
}

std::vector<IdCertificate> adversary_generate(const ComputeBudget& budget,
                                              uint64_t window_steps,
                                              const PuzzleParams& params,
                                              PowBehavior behavior,
                                              std::span<const uint8_t> r_prev,
                                              uint64_t epoch_valid, Rng& adv_rng) {
  std::vector<IdCertificate> out;
  uint64_t tau_units = static_cast<uint64_t>(params.tau * 0x1.0p64);
  for (size_t unit = 0; unit < budget.adversary_units; ++unit) {
    uint64_t attempts = static_cast<uint64_t>(
        static_cast<double>(window_steps) * params.attempts_per_unit_step);
    for (uint64_t a = 0; a < attempts; ++a) {
      std::vector<uint8_t> sigma;
      if (behavior == PowBehavior::bias_small_outputs) {
        // Confine puzzle inputs to a small prefix of the input space:
        // sigma = r XOR (a short random value). The solution rate is
        // unchanged; under the ablation the resulting ids cluster low.
        std::vector<uint8_t> small(params.sigma_bits / 8, 0);
        for (size_t i = small.size() >= 6 ? small.size() - 6 : 0; i < small.size(); ++i) {
          small[i] = static_cast<uint8_t>(adv_rng.next() & 0xff);
        }
        sigma = xor_bytes(small, r_prev);
      } else {
        sigma = random_sigma(params.sigma_bits, adv_rng);
      }
      if (puzzle_output_units(sigma, r_prev) <= tau_units) {
        IdCertificate cert;
        cert.sigma = std::move(sigma);
        cert.epoch_string_ref = epoch_string_ref(r_prev);
        cert.id_value = id_from_solution(cert.sigma, r_prev, params);
        cert.epoch_valid = epoch_valid;
        cert.owner = ~0ULL;
        out.push_back(std::move(cert));
      }
    }
  }
  return out;
}

uint64_t adversary_certificate_count(const ComputeBudget& budget, uint64_t window_steps,
                                     const PuzzleParams& params, Rng& adv_rng) {
  // Solutions arrive one per Geometric(tau) attempts; jump between
  // successes instead of hashing every attempt.
  uint64_t total = 0;
  double log_q = std::log1p(-params.tau);
  for (size_t unit = 0; unit < budget.adversary_units; ++unit) {
    double attempts = static_cast<double>(window_steps) * params.attempts_per_unit_step;
    double used = 0.0;
    for (;;) {
      double u = adv_rng.unit();
      double gap = std::floor(std::log(1.0 - u) / log_q) + 1.0;
      used += gap;
      if (used > attempts) break;
      total++;
    }
  }
  return total;
}

bool verify_certificate(const IdCertificate& cert,
                        std::span<const std::vector<uint8_t>> solution_strings,
                        const PuzzleParams& params, uint64_t current_epoch) {
  if (current_epoch > cert.epoch_valid) return false;  // expired
  uint64_t tau_units = static_cast<uint64_t>(params.tau * 0x1.0p64);
  for (const auto& r : solution_strings) {
    if (epoch_string_ref(r) != cert.epoch_string_ref) continue;
    if (puzzle_output_units(cert.sigma, r) > tau_units) return false;
    return id_from_solution(cert.sigma, r, params) == cert.id_value;
  }
  return false;  // signing string unknown to this verifier
}

IdLifecycle lifecycle_at(uint64_t created_epoch, uint64_t current_epoch) {
  if (current_epoch <= created_epoch + 1) return IdLifecycle::active;
  if (current_epoch == created_epoch + 2) return IdLifecycle::passive;
  return IdLifecycle::expired;
}

std::string IdCertificate::to_json() const {
  nlohmann::json j;
  j["sigma_hex"] = to_hex(sigma);
  j["epoch"] = epoch_valid;
  j["id_hex"] = id_value.to_hex();
  j["owner"] = owner;
  return j.dump();
}

}  // namespace tinygroups
