#include "dadvi/draws.hpp"

#include "dadvi/errors.hpp"
#include "dadvi/random.hpp"

#include <fmt/format.h>

#include <array>
#include <bit>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dadvi {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'A', 'D', 'V', 'I', 'Z', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  }
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) {
    throw InvalidConfiguration("truncated DrawSet binary artifact");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | bytes[i];
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  return fields;
}

}  // namespace

DrawSet::DrawSet(std::uint64_t seed, DrawMatrix draws)
    : seed_(seed),
      draws_(std::make_shared<const DrawMatrix>(std::move(draws))) {
  if (draws_->rows() < 1 || draws_->cols() < 1) {
    throw InvalidConfiguration("a DrawSet needs at least one draw of dimension >= 1");
  }
}

std::size_t DrawSet::num_draws() const noexcept {
  return static_cast<std::size_t>(draws_->rows());
}

std::size_t DrawSet::dim() const noexcept {
  return static_cast<std::size_t>(draws_->cols());
}

Eigen::VectorXd DrawSet::draw(std::size_t n) const {
  return draws_->row(static_cast<Eigen::Index>(n)).transpose();
}

Eigen::VectorXd DrawSet::mean() const {
  return draws_->colwise().mean().transpose();
}

std::string DrawSet::fingerprint() const {
  // FNV-1a over the seed, shape and raw value bits.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(seed_);
  feed(num_draws());
  feed(dim());
  const double* data = draws_->data();
  for (Eigen::Index i = 0; i < draws_->size(); ++i) {
    feed(std::bit_cast<std::uint64_t>(data[i]));
  }
  return fmt::format("{:016x}", h);
}

bool operator==(const DrawSet& a, const DrawSet& b) {
  return a.seed_ == b.seed_ && a.draws_->rows() == b.draws_->rows() &&
         a.draws_->cols() == b.draws_->cols() && *a.draws_ == *b.draws_;
}

DrawSet sample_draws(std::uint64_t seed, std::size_t num_draws,
                     std::size_t dim) {
  if (num_draws == 0) {
    throw InvalidConfiguration("invalid draw count: N must be >= 1");
  }
  if (dim == 0) {
    throw InvalidConfiguration("invalid draw dimension: D must be >= 1");
  }
  NormalStream stream(seed);
  DrawMatrix z(static_cast<Eigen::Index>(num_draws),
               static_cast<Eigen::Index>(dim));
  // Row-major fill: the stream order is z_1[1], z_1[2], ..., z_N[D].
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z.data()[i] = stream.next();
  }
  return DrawSet(seed, std::move(z));
}

void write_drawset_csv(std::ostream& out, const DrawSet& draws) {
  out << "seed,num_draws,dim\n";
  out << draws.seed() << ',' << draws.num_draws() << ',' << draws.dim() << '\n';
  const DrawMatrix& z = draws.matrix();
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    for (Eigen::Index d = 0; d < z.cols(); ++d) {
      if (d > 0) {
        out << ',';
      }
      out << fmt::format("{:.17g}", z(n, d));
    }
    out << '\n';
  }
}

DrawSet read_drawset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "seed,num_draws,dim") {
    throw InvalidConfiguration("DrawSet CSV: missing header");
  }
  if (!std::getline(in, line)) {
    throw InvalidConfiguration("DrawSet CSV: missing shape row");
  }
  const auto shape = split_csv(line);
  if (shape.size() != 3) {
    throw InvalidConfiguration("DrawSet CSV: malformed shape row");
  }
  const std::uint64_t seed = std::stoull(shape[0]);
  const auto rows = static_cast<Eigen::Index>(std::stoull(shape[1]));
  const auto cols = static_cast<Eigen::Index>(std::stoull(shape[2]));
  DrawMatrix z(rows, cols);
  for (Eigen::Index n = 0; n < rows; ++n) {
    if (!std::getline(in, line)) {
      throw InvalidConfiguration("DrawSet CSV: too few rows");
    }
    const auto fields = split_csv(line);
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw InvalidConfiguration("DrawSet CSV: wrong row width");
    }
    for (Eigen::Index d = 0; d < cols; ++d) {
      z(n, d) = std::stod(fields[static_cast<std::size_t>(d)]);
    }
  }
  return DrawSet(seed, std::move(z));
}

void write_drawset_binary(std::ostream& out, const DrawSet& draws) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, draws.seed());
  put_u64(out, draws.num_draws());
  put_u64(out, draws.dim());
  const DrawMatrix& z = draws.matrix();
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    put_u64(out, std::bit_cast<std::uint64_t>(z.data()[i]));
  }
}

DrawSet read_drawset_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw InvalidConfiguration("not a DrawSet binary artifact");
  }
  const std::uint64_t seed = get_u64(in);
  const auto rows = static_cast<Eigen::Index>(get_u64(in));
  const auto cols = static_cast<Eigen::Index>(get_u64(in));
  DrawMatrix z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z.data()[i] = std::bit_cast<double>(get_u64(in));
  }
  return DrawSet(seed, std::move(z));
}

}  // namespace dadvi
