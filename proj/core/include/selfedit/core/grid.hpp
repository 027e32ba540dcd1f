#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace selfedit {

/// Rectangular ARC grid of color indices 0-9, at most 30x30.
class Grid {
 public:
  static constexpr int kMaxSide = 30;
  static constexpr int kNumColors = 10;

  Grid() = default;

  /// Throws Error(kInvalidArgument) on ragged rows, empty input, out-of-range
  /// colors or sides above kMaxSide.
  explicit Grid(const std::vector<std::vector<int>>& rows);
  Grid(std::initializer_list<std::initializer_list<int>> rows);

  /// Zero-filled grid.
  Grid(int rows, int cols);

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return cells_.empty(); }

  [[nodiscard]] int at(int r, int c) const { return cells_[index(r, c)]; }
  void set(int r, int c, int color);

  [[nodiscard]] std::vector<std::vector<int>> to_rows() const;
  [[nodiscard]] std::span<const std::uint8_t> cells() const noexcept { return cells_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  [[nodiscard]] std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct GridPair {
  Grid input;
  Grid output;

  friend bool operator==(const GridPair&, const GridPair&) = default;
};

}  // namespace selfedit
