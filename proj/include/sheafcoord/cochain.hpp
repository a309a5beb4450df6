#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sheafcoord/linear_map.hpp"

namespace sheafcoord {

/// Block layout of a flattened cochain: block k occupies
/// [offsets[k], offsets[k+1]) in index order.
class BlockLayout {
 public:
  BlockLayout() : offsets_{0} {}

  explicit BlockLayout(const std::vector<std::size_t>& dims) : offsets_{0} {
    offsets_.reserve(dims.size() + 1);
    for (auto d : dims) offsets_.push_back(offsets_.back() + d);
  }

  std::size_t blocks() const { return offsets_.size() - 1; }
  std::size_t total() const { return offsets_.back(); }
  std::size_t offset(std::size_t k) const { return offsets_[k]; }
  std::size_t dim(std::size_t k) const { return offsets_[k + 1] - offsets_[k]; }

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;

 private:
  std::vector<std::size_t> offsets_;
};

struct VertexBlocks {};
struct EdgeBlocks {};

/// Block vector over vertices (Tag = VertexBlocks) or edges (Tag = EdgeBlocks).
template <class Tag>
class Cochain {
 public:
  Cochain() = default;

  explicit Cochain(BlockLayout layout)
      : layout_(std::move(layout)), values_(Vector::Zero(static_cast<Eigen::Index>(layout_.total()))) {}

  Cochain(BlockLayout layout, Vector values) : layout_(std::move(layout)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != layout_.total()) {
      throw std::invalid_argument("Cochain: flat length " + std::to_string(values_.size()) +
                                  " does not match layout total " + std::to_string(layout_.total()));
    }
  }

  const BlockLayout& layout() const { return layout_; }
  std::size_t blocks() const { return layout_.blocks(); }

  auto block(std::size_t k) {
    return values_.segment(static_cast<Eigen::Index>(layout_.offset(k)), static_cast<Eigen::Index>(layout_.dim(k)));
  }
  auto block(std::size_t k) const {
    return values_.segment(static_cast<Eigen::Index>(layout_.offset(k)), static_cast<Eigen::Index>(layout_.dim(k)));
  }

  Vector& flat() { return values_; }
  const Vector& flat() const { return values_; }

  double norm() const { return values_.norm(); }
  double max_abs() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }
  double dot(const Cochain& o) const { return values_.dot(o.values_); }

  Cochain& operator+=(const Cochain& o) { values_ += o.values_; return *this; }
  Cochain& operator-=(const Cochain& o) { values_ -= o.values_; return *this; }
  Cochain& operator*=(double a) { values_ *= a; return *this; }
  friend Cochain operator+(Cochain a, const Cochain& b) { return a += b; }
  friend Cochain operator-(Cochain a, const Cochain& b) { return a -= b; }
  friend Cochain operator*(double a, Cochain c) { return c *= a; }

  friend bool operator==(const Cochain& a, const Cochain& b) {
    return a.layout_ == b.layout_ && a.values_ == b.values_;
  }

 private:
  BlockLayout layout_;
  Vector values_;
};

using Cochain0 = Cochain<VertexBlocks>;
using Cochain1 = Cochain<EdgeBlocks>;

}  // namespace sheafcoord
