#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gamescope {

/// A named rows x cols block of a flat parameter vector, stored row-major.
struct Segment {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

class Layout {
 public:
  Layout() = default;

  Layout& add(std::string name, Eigen::Index rows, Eigen::Index cols);
  /// Segments of `other` appended after ours, names prefixed.
  Layout& append(const Layout& other, const std::string& prefix = "");

  const std::vector<Segment>& segments() const { return segments_; }
  Eigen::Index size() const { return size_; }
  const Segment& find(const std::string& name) const;

  bool operator==(const Layout&) const = default;

 private:
  std::vector<Segment> segments_;
  Eigen::Index size_ = 0;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Flat parameter values plus the layout that gives them structure.
class ParamVector {
 public:
  ParamVector() = default;
  /// Throws ShapeError on a length mismatch and NumericError on non-finite
  /// values.
  ParamVector(Layout layout, Eigen::VectorXd values);

  static ParamVector zeros(Layout layout);

  const Layout& layout() const { return layout_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Map<const RowMajorMatrix> segment(const std::string& name) const;
  Eigen::Map<RowMajorMatrix> segment(const std::string& name);

 private:
  Layout layout_;
  Eigen::VectorXd values_;
};

/// Binary checkpoint: "GSCK" magic, u32 version, u32 segment count, then per
/// segment u32 name length, name bytes, u64 rows, u64 cols; then u64 value
/// count and the values as little-endian IEEE-754 doubles.
void write_checkpoint(std::ostream& out, const ParamVector& params);
ParamVector read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ParamVector& params);
ParamVector load_checkpoint(const std::string& path);

/// Debug dump, one row per scalar: segment,row,col,value.
void write_params_csv(std::ostream& out, const ParamVector& params);

}  // namespace gamescope
