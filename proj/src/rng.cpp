#include "slowfast/rng.hpp"

#include <cmath>

namespace slowfast {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void philox_round(std::array<std::uint64_t, 4>& c,
                         const std::array<std::uint64_t, 2>& k) {
  const unsigned __int128 p0 = static_cast<unsigned __int128>(kMult0) * c[0];
  const unsigned __int128 p1 = static_cast<unsigned __int128>(kMult1) * c[2];
  const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
  const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
  const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
  const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key) {
  philox_round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    philox_round(counter, key);
  }
  return counter;
}

void NoiseStream::fill_normals(std::uint64_t step, std::uint32_t subsystem,
                               Eigen::Ref<Eigen::VectorXd> out) const {
  const Eigen::Index n = out.size();
  const std::array<std::uint64_t, 2> key = {seed_, replica_};
  Eigen::Index i = 0;
  std::uint64_t block = 0;
  while (i < n) {
    const auto w = philox4x64({block, step, subsystem, replica_}, key);
    // one block yields two Box-Muller pairs
    for (int pair = 0; pair < 2 && i < n; ++pair) {
      const double u = uint64_to_unit(w[2 * pair]);
      const double v = uint64_to_unit(w[2 * pair + 1]);
      const double r = std::sqrt(-2.0 * std::log(u));
      out[i++] = r * std::cos(kTwoPi * v);
      if (i < n) out[i++] = r * std::sin(kTwoPi * v);
    }
    ++block;
  }
}

void NoiseStream::fill_uniforms(std::uint64_t step, std::uint32_t subsystem,
                                Eigen::Ref<Eigen::VectorXd> out) const {
  const Eigen::Index n = out.size();
  const std::array<std::uint64_t, 2> key = {seed_, replica_};
  Eigen::Index i = 0;
  std::uint64_t block = 0;
  while (i < n) {
    const auto w = philox4x64({block, step, subsystem, replica_}, key);
    for (int j = 0; j < 4 && i < n; ++j) out[i++] = uint64_to_unit(w[j]);
    ++block;
  }
}

NoiseDraw draw_noise(const NoiseStream& stream, std::uint64_t step,
                     int theta_dim, int z_dim) {
  NoiseDraw d{Eigen::VectorXd(theta_dim), Eigen::VectorXd(z_dim)};
  draw_noise(stream, step, d);
  return d;
}

void draw_noise(const NoiseStream& stream, std::uint64_t step, NoiseDraw& out) {
  stream.fill_normals(step, kThetaSubsystem, out.theta_noise);
  stream.fill_normals(step, kZSubsystem, out.z_noise);
}

}  // namespace slowfast
