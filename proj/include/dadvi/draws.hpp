#ifndef DADVI_DRAWS_HPP
#define DADVI_DRAWS_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

namespace dadvi {

using DrawMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * The fixed set Z = {z_1, ..., z_N} of standard-normal draws that defines a
 * deterministic objective. Row n is z_n. Immutable; copies share storage.
 */
class DrawSet {
 public:
  DrawSet(std::uint64_t seed, DrawMatrix draws);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t num_draws() const noexcept;
  std::size_t dim() const noexcept;
  const DrawMatrix& matrix() const noexcept { return *draws_; }
  Eigen::VectorXd draw(std::size_t n) const;

  /// Sample mean zbar of the draws.
  Eigen::VectorXd mean() const;

  /// Hex digest of (seed, shape, values); equal digests identify the same set.
  std::string fingerprint() const;

  friend bool operator==(const DrawSet& a, const DrawSet& b);

 private:
  std::uint64_t seed_;
  std::shared_ptr<const DrawMatrix> draws_;
};

/// N x D standard-normal draws, deterministic in `seed`.
DrawSet sample_draws(std::uint64_t seed, std::size_t num_draws,
                     std::size_t dim);

// Artifacts. CSV: a "seed,num_draws,dim" header row, one row holding those
// values, then N rows of D values (17 significant digits). Binary: the
// 8-byte magic "DADVIZ01", then seed, N, D as little-endian uint64, then the
// N*D row-major values as little-endian IEEE-754 doubles.
void write_drawset_csv(std::ostream& out, const DrawSet& draws);
DrawSet read_drawset_csv(std::istream& in);
void write_drawset_binary(std::ostream& out, const DrawSet& draws);
DrawSet read_drawset_binary(std::istream& in);

}  // namespace dadvi

#endif  // DADVI_DRAWS_HPP
