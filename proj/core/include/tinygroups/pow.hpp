#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tinygroups/adversary.hpp"
#include "tinygroups/idring.hpp"
#include "tinygroups/rng.hpp"

namespace tinygroups {

struct PuzzleParams {
  double tau = 0.0;                  // success threshold in (0,1)
  uint64_t epoch_steps = 0;          // T
  double attempts_per_unit_step = 1; // compute model, not wall clock
  size_t sigma_bits = 0;             // ceil(ell * ln n), rounded up to bytes
  double epsilon = 0.1;
  bool single_hash_ablation = false; // id := puzzle input instead of f(g(.))
};

// tau = 2 / (rate * T): one compute unit is expected to need T/2 steps
// per solution. Throws on non-positive inputs or tau >= 1.
double calibrate_tau(uint64_t epoch_steps, double attempts_per_unit_step);

size_t sigma_bits_for(double ell, size_t n);  // ell*ln n rounded up to a byte multiple

struct IdCertificate {
  std::vector<uint8_t> sigma;
  std::string epoch_string_ref;  // hex ref of the signing string
  IdPoint id_value;
  uint64_t epoch_valid = 0;      // epoch the id is active in
  uint64_t owner = 0;            // participant handle

  std::string to_json() const;
};

std::string epoch_string_ref(std::span<const uint8_t> r);

// g(sigma XOR r) as a ring fraction; the puzzle predicate is g <= tau.
uint64_t puzzle_output_units(std::span<const uint8_t> sigma, std::span<const uint8_t> r);
// f applied to the puzzle output: the id the solution earns.
IdPoint id_from_solution(std::span<const uint8_t> sigma, std::span<const uint8_t> r,
                         const PuzzleParams& params);

/**
 * Honest generation: draw random sigmas until one satisfies the
 * puzzle, spending at most steps * rate attempts. Returns nothing if
 * the budget runs out first.
 */
std::optional<IdCertificate> attempt_generate(std::span<const uint8_t> r_prev,
                                              uint64_t steps, const PuzzleParams& params,
                                              uint64_t epoch_valid, uint64_t owner, Rng& rng);

struct ComputeBudget {
  size_t good_units = 0;
  size_t adversary_units = 0;
};

/**
 * All certificates the adversary's units find in a window, under its
 * chosen strategy. bias_small_outputs restricts the sigma pool the
 * adversary draws from; under the two-hash scheme that cannot steer
 * f(g(.)), under the single-hash ablation it visibly skews the ids.
 */
std::vector<IdCertificate> adversary_generate(const ComputeBudget& budget,
                                              uint64_t window_steps,
                                              const PuzzleParams& params,
                                              PowBehavior behavior,
                                              std::span<const uint8_t> r_prev,
                                              uint64_t epoch_valid, Rng& adv_rng);

// Count-law equivalent of adversary_generate: per-unit solution counts
// drawn from the same geometric process without materializing sigmas.
// Cheap enough for wide Monte Carlo sweeps over the count bound.
uint64_t adversary_certificate_count(const ComputeBudget& budget, uint64_t window_steps,
                                     const PuzzleParams& params, Rng& adv_rng);

// Valid iff the signing string is one the verifier holds, the puzzle
// predicate checks out, the id recomputes, and the epoch has not
// expired (a certificate is stale once current_epoch > epoch_valid).
// sigma reaches the verifier through a simulation-only trusted channel
// standing in for a zero-knowledge preimage proof.
bool verify_certificate(const IdCertificate& cert,
                        std::span<const std::vector<uint8_t>> solution_strings,
                        const PuzzleParams& params, uint64_t current_epoch);

enum class IdLifecycle : uint8_t { active, passive, expired };

// Lifecycle of an id created in epoch `created`: active in created+1,
// passive in created+2, expired afterwards.
IdLifecycle lifecycle_at(uint64_t created_epoch, uint64_t current_epoch);

}  // namespace tinygroups
