#include "gamescope/params.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/error.hpp"

namespace gamescope {

Layout& Layout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw ShapeError(fmt::format("segment '{}' has empty shape {}x{}", name, rows, cols));
  if (std::any_of(segments_.begin(), segments_.end(), [&](const Segment& s) { return s.name == name; })) {
    throw ShapeError(fmt::format("duplicate segment '{}'", name));
  }
  segments_.push_back(Segment{std::move(name), rows, cols, size_});
  size_ += rows * cols;
  return *this;
}

Layout& Layout::append(const Layout& other, const std::string& prefix) {
  for (const Segment& s : other.segments()) add(prefix + s.name, s.rows, s.cols);
  return *this;
}

const Segment& Layout::find(const std::string& name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return s;
  }
  throw ShapeError(fmt::format("no segment named '{}'", name));
}

ParamVector::ParamVector(Layout layout, Eigen::VectorXd values) : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_.size()) {
    throw ShapeError(fmt::format("layout expects {} values, got {}", layout_.size(), values_.size()));
  }
  if (!values_.allFinite()) throw NumericError("parameter vector has non-finite values");
}

ParamVector ParamVector::zeros(Layout layout) {
  const Eigen::Index n = layout.size();
  return ParamVector(std::move(layout), Eigen::VectorXd::Zero(n));
}

Eigen::Map<const RowMajorMatrix> ParamVector::segment(const std::string& name) const {
  const Segment& s = layout_.find(name);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<RowMajorMatrix> ParamVector::segment(const std::string& name) {
  const Segment& s = layout_.find(name);
  return {values_.data() + s.offset, s.rows, s.cols};
}

namespace {

constexpr std::array<char, 4> kMagic{'G', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), sizeof(T))) throw FormatError("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamVector& params) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  const auto& segs = params.layout().segments();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(segs.size()));
  for (const Segment& s : segs) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(s.rows));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(s.cols));
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) put<double>(out, params.values()(i));
}

ParamVector read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("not a checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw FormatError(fmt::format("unsupported checkpoint version {}", version));
  const auto count = get<std::uint32_t>(in);
  Layout layout;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in);
    if (len > 4096) throw FormatError("segment name too long");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("checkpoint truncated");
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    try {
      layout.add(std::move(name), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } catch (const ShapeError& e) {
      throw FormatError(e.what());
    }
  }
  const auto n = get<std::uint64_t>(in);
  if (static_cast<Eigen::Index>(n) != layout.size()) {
    throw FormatError(fmt::format("checkpoint holds {} values but its layout needs {}", n, layout.size()));
  }
  Eigen::VectorXd values(layout.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = get<double>(in);
  try {
    return ParamVector(std::move(layout), std::move(values));
  } catch (const NumericError& e) {
    throw FormatError(e.what());
  }
}

void save_checkpoint(const std::string& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot open '{}' for writing", path));
  write_checkpoint(out, params);
  if (!out) throw FormatError(fmt::format("failed writing '{}'", path));
}

ParamVector load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open checkpoint '{}'", path));
  return read_checkpoint(in);
}

void write_params_csv(std::ostream& out, const ParamVector& params) {
  out << "segment,row,col,value\n";
  for (const Segment& s : params.layout().segments()) {
    for (Eigen::Index r = 0; r < s.rows; ++r) {
      for (Eigen::Index c = 0; c < s.cols; ++c) {
        fmt::print(out, "{},{},{},{}\n", s.name, r, c, params.values()(s.offset + r * s.cols + c));
      }
    }
  }
}

}  // namespace gamescope
