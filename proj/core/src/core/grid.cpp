#include "selfedit/core/grid.hpp"

#include "selfedit/core/error.hpp"

namespace selfedit {

namespace {

void check_color(int color) {
  if (color < 0 || color >= Grid::kNumColors) {
    throw Error(ErrorCode::kInvalidArgument, "grid color out of range: " + std::to_string(color));
  }
}

}  // namespace

Grid::Grid(const std::vector<std::vector<int>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorCode::kInvalidArgument, "grid must have at least one cell");
  }
  rows_ = static_cast<int>(rows.size());
  cols_ = static_cast<int>(rows.front().size());
  if (rows_ > kMaxSide || cols_ > kMaxSide) {
    throw Error(ErrorCode::kInvalidArgument, "grid side exceeds 30");
  }
  cells_.reserve(static_cast<std::size_t>(rows_ * cols_));
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != cols_) {
      throw Error(ErrorCode::kInvalidArgument, "grid rows have unequal length");
    }
    for (int color : row) {
      check_color(color);
      cells_.push_back(static_cast<std::uint8_t>(color));
    }
  }
}

Grid::Grid(std::initializer_list<std::initializer_list<int>> rows)
    : Grid([&] {
        std::vector<std::vector<int>> out;
        for (const auto& row : rows) out.emplace_back(row);
        return out;
      }()) {}

Grid::Grid(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1 || rows > kMaxSide || cols > kMaxSide) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimensions out of range");
  }
  cells_.assign(static_cast<std::size_t>(rows * cols), 0);
}

void Grid::set(int r, int c, int color) {
  check_color(color);
  cells_[index(r, c)] = static_cast<std::uint8_t>(color);
}

std::vector<std::vector<int>> Grid::to_rows() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(rows_));
  for (int r = 0; r < rows_; ++r) {
    out[static_cast<std::size_t>(r)].reserve(static_cast<std::size_t>(cols_));
    for (int c = 0; c < cols_; ++c) out[static_cast<std::size_t>(r)].push_back(at(r, c));
  }
  return out;
}

}  // namespace selfedit
