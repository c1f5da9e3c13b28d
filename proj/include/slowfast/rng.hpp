#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

namespace slowfast {

// Philox4x64-10 counter-based generator. A block maps (counter, key) to 256
// random bits; draws are addressed rather than iterated, so replicas, steps
// and subsystems can be generated independently, in any order, on any thread.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// Maps a 64-bit word to the open interval (0, 1).
inline double uint64_to_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// Addressable stream of variates keyed by (seed, replica). A draw is
// addressed by (step, subsystem, element index); identical addresses always
// yield identical values.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed, std::uint64_t replica = 0)
      : seed_(seed), replica_(replica) {}

  // Fills `out` with i.i.d. standard normals.
  void fill_normals(std::uint64_t step, std::uint32_t subsystem,
                    Eigen::Ref<Eigen::VectorXd> out) const;

  // Fills `out` with i.i.d. U(0,1) variates.
  void fill_uniforms(std::uint64_t step, std::uint32_t subsystem,
                     Eigen::Ref<Eigen::VectorXd> out) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t replica() const { return replica_; }

 private:
  std::uint64_t seed_;
  std::uint64_t replica_;
};

// Standard-normal Wiener-increment draw for one integrator step.
struct NoiseDraw {
  Eigen::VectorXd theta_noise;  // d_theta
  Eigen::VectorXd z_noise;      // N * d_x
};

inline constexpr std::uint32_t kThetaSubsystem = 0;
inline constexpr std::uint32_t kZSubsystem = 1;

NoiseDraw draw_noise(const NoiseStream& stream, std::uint64_t step,
                     int theta_dim, int z_dim);

void draw_noise(const NoiseStream& stream, std::uint64_t step, NoiseDraw& out);

}  // namespace slowfast
