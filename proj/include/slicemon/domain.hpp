#pragma once

// Subgroup lattice: attribute schema, subgroups as level-index tuples,
// enumeration in lexicographic order and one-hot encoding.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slicemon/error.hpp"

namespace slicemon {

struct Attribute {
  std::string name;
  std::vector<std::string> levels;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// Ordered list of categorical attributes. Immutable after construction;
/// attribute order fixes both enumeration order and one-hot block order.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  /// Throws ConfigError on empty schema, duplicate names, duplicate or missing levels.
  explicit AttributeSchema(std::vector<Attribute> attributes);

  std::size_t size() const { return attributes_.size(); }
  const Attribute& attribute(std::size_t i) const { return attributes_.at(i); }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  int cardinality(std::size_t i) const { return static_cast<int>(attributes_.at(i).levels.size()); }

  /// Product of the cardinalities.
  std::uint64_t lattice_size() const { return lattice_size_; }
  /// Length of a one-hot encoding: sum of the cardinalities.
  Eigen::Index encoded_dim() const { return encoded_dim_; }
  /// Offset of attribute i's block inside the one-hot vector.
  Eigen::Index block_offset(std::size_t i) const { return offsets_.at(i); }

  /// Index of the attribute called `name`, or -1.
  int find(const std::string& name) const;

 private:
  std::vector<Attribute> attributes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index encoded_dim_ = 0;
  std::uint64_t lattice_size_ = 0;
};

/// One point of the lattice: a level index per schema attribute.
class Subgroup {
 public:
  Subgroup() = default;
  explicit Subgroup(std::vector<int> levels) : levels_(std::move(levels)) {}
  Subgroup(std::initializer_list<int> levels) : levels_(levels) {}

  std::size_t size() const { return levels_.size(); }
  int operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<int>& levels() const { return levels_; }

  friend auto operator<=>(const Subgroup&, const Subgroup&) = default;
  friend bool operator==(const Subgroup&, const Subgroup&) = default;

 private:
  std::vector<int> levels_;
};

struct SubgroupHash {
  std::size_t operator()(const Subgroup& s) const noexcept;
};

/// Throws InvalidSubgroupError unless `s` has one in-range index per attribute.
void validate(const AttributeSchema& schema, const Subgroup& s);
bool is_valid(const AttributeSchema& schema, const Subgroup& s) noexcept;

/// All subgroups, attribute 0 varying slowest.
std::vector<Subgroup> enumerate_subgroups(const AttributeSchema& schema);

/// Position of `s` in enumerate_subgroups(schema) (mixed-radix rank).
std::uint64_t subgroup_id(const AttributeSchema& schema, const Subgroup& s);
Subgroup subgroup_from_id(const AttributeSchema& schema, std::uint64_t id);

/// "name=level&name=level..." in schema order.
std::string subgroup_label(const AttributeSchema& schema, const Subgroup& s);

/// Block one-hot vector of length schema.encoded_dim().
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> encode(const AttributeSchema& schema, const Subgroup& s) {
  validate(schema, s);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(schema.encoded_dim());
  for (std::size_t i = 0; i < schema.size(); ++i) x(schema.block_offset(i) + s[i]) = Scalar(1);
  return x;
}

/// Encodings stacked as rows (one row per subgroup).
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> encode_rows(const AttributeSchema& schema,
                                                                  std::span<const Subgroup> subgroups) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> X(static_cast<Eigen::Index>(subgroups.size()),
                                                          schema.encoded_dim());
  for (std::size_t r = 0; r < subgroups.size(); ++r)
    X.row(static_cast<Eigen::Index>(r)) = encode<Scalar>(schema, subgroups[r]).transpose();
  return X;
}

/// Inverse of encode. Throws InvalidSubgroupError unless every block holds exactly one 1.
template <typename Derived>
Subgroup decode(const AttributeSchema& schema, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != schema.encoded_dim()) throw InvalidSubgroupError("decode: encoding has wrong length");
  std::vector<int> levels(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    int hot = -1;
    for (int l = 0; l < schema.cardinality(i); ++l) {
      const auto v = x(schema.block_offset(i) + l);
      if (v == 1) {
        if (hot >= 0) throw InvalidSubgroupError("decode: more than one hot entry in block " + std::to_string(i));
        hot = l;
      } else if (v != 0) {
        throw InvalidSubgroupError("decode: non-binary entry in block " + std::to_string(i));
      }
    }
    if (hot < 0) throw InvalidSubgroupError("decode: no hot entry in block " + std::to_string(i));
    levels[i] = hot;
  }
  return Subgroup(std::move(levels));
}

/// Index of the half-open bin holding `value`. `edges` e1<...<ek give bins
/// (-inf,e1), [e1,e2), ..., [ek,inf). Throws DataError on non-finite input.
int bin_numeric(double value, std::span<const double> edges);

/// Throws ConfigError unless edges are finite and strictly increasing.
void validate_bin_edges(std::span<const double> edges);

/// Default level labels for numeric bins, e.g. "<20", "20-30", ..., ">=60".
std::vector<std::string> default_bin_labels(std::span<const double> edges);

}  // namespace slicemon
