#include "slicemon/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace slicemon {

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw ConfigError("attribute schema is empty");
  std::set<std::string> names;
  lattice_size_ = 1;
  for (const auto& attr : attributes_) {
    if (attr.name.empty()) throw ConfigError("attribute with empty name");
    if (!names.insert(attr.name).second) throw ConfigError("duplicate attribute '" + attr.name + "'");
    if (attr.levels.empty()) throw ConfigError("attribute '" + attr.name + "' has no levels");
    std::set<std::string> seen(attr.levels.begin(), attr.levels.end());
    if (seen.size() != attr.levels.size())
      throw ConfigError("attribute '" + attr.name + "' has duplicate level labels");

    offsets_.push_back(encoded_dim_);
    encoded_dim_ += static_cast<Eigen::Index>(attr.levels.size());
    if (lattice_size_ > std::numeric_limits<std::uint64_t>::max() / attr.levels.size())
      throw ConfigError("subgroup lattice too large");
    lattice_size_ *= attr.levels.size();
  }
}

int AttributeSchema::find(const std::string& name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i)
    if (attributes_[i].name == name) return static_cast<int>(i);
  return -1;
}

std::size_t SubgroupHash::operator()(const Subgroup& s) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (int v : s.levels()) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

bool is_valid(const AttributeSchema& schema, const Subgroup& s) noexcept {
  if (s.size() != schema.size()) return false;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] < 0 || s[i] >= schema.cardinality(i)) return false;
  return true;
}

void validate(const AttributeSchema& schema, const Subgroup& s) {
  if (s.size() != schema.size())
    throw InvalidSubgroupError("subgroup has " + std::to_string(s.size()) + " levels, schema has " +
                               std::to_string(schema.size()) + " attributes");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] >= schema.cardinality(i))
      throw InvalidSubgroupError("level " + std::to_string(s[i]) + " out of range for attribute '" +
                                 schema.attribute(i).name + "'");
  }
}

std::vector<Subgroup> enumerate_subgroups(const AttributeSchema& schema) {
  std::vector<Subgroup> out;
  out.reserve(static_cast<std::size_t>(schema.lattice_size()));
  std::vector<int> cur(schema.size(), 0);
  while (true) {
    out.emplace_back(cur);
    // odometer increment, last attribute fastest
    std::size_t i = schema.size();
    while (i > 0) {
      --i;
      if (++cur[i] < schema.cardinality(i)) break;
      cur[i] = 0;
      if (i == 0) return out;
    }
  }
}

std::uint64_t subgroup_id(const AttributeSchema& schema, const Subgroup& s) {
  validate(schema, s);
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < s.size(); ++i) id = id * static_cast<std::uint64_t>(schema.cardinality(i)) + s[i];
  return id;
}

Subgroup subgroup_from_id(const AttributeSchema& schema, std::uint64_t id) {
  if (id >= schema.lattice_size()) throw InvalidSubgroupError("subgroup id out of range");
  std::vector<int> levels(schema.size());
  for (std::size_t i = schema.size(); i-- > 0;) {
    const auto m = static_cast<std::uint64_t>(schema.cardinality(i));
    levels[i] = static_cast<int>(id % m);
    id /= m;
  }
  return Subgroup(std::move(levels));
}

std::string subgroup_label(const AttributeSchema& schema, const Subgroup& s) {
  validate(schema, s);
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += '&';
    out += schema.attribute(i).name;
    out += '=';
    out += schema.attribute(i).levels[s[i]];
  }
  return out;
}

void validate_bin_edges(std::span<const double> edges) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw ConfigError("bin edges must be finite");
    if (i > 0 && !(edges[i - 1] < edges[i])) throw ConfigError("bin edges must be strictly increasing");
  }
}

int bin_numeric(double value, std::span<const double> edges) {
  if (!std::isfinite(value)) throw DataError("cannot bin non-finite value");
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

namespace {
std::string format_edge(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}
}  // namespace

std::vector<std::string> default_bin_labels(std::span<const double> edges) {
  std::vector<std::string> labels;
  if (edges.empty()) return {"all"};
  labels.push_back("<" + format_edge(edges.front()));
  for (std::size_t i = 1; i < edges.size(); ++i)
    labels.push_back(format_edge(edges[i - 1]) + "-" + format_edge(edges[i]));
  labels.push_back(">=" + format_edge(edges.back()));
  return labels;
}

}  // namespace slicemon
