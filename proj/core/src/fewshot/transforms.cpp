#include "selfedit/fewshot/transforms.hpp"

#include <algorithm>

#include "selfedit/core/error.hpp"

namespace selfedit::fewshot {

std::string_view to_string(Transform t) noexcept {
  switch (t) {
    case Transform::kIdentity: return "identity";
    case Transform::kRotate90: return "rotate90";
    case Transform::kRotate180: return "rotate180";
    case Transform::kRotate270: return "rotate270";
    case Transform::kFlipHorizontal: return "flip-horizontal";
    case Transform::kFlipVertical: return "flip-vertical";
    case Transform::kTranspose: return "transpose";
    case Transform::kAntiTranspose: return "anti-transpose";
  }
  return "unknown";
}

Grid apply(const Grid& grid, Transform t) {
  const int rows = grid.rows();
  const int cols = grid.cols();
  const bool swaps = t == Transform::kRotate90 || t == Transform::kRotate270 || t == Transform::kTranspose ||
                     t == Transform::kAntiTranspose;
  Grid out = swaps ? Grid(cols, rows) : Grid(rows, cols);
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      int sr = r;
      int sc = c;
      switch (t) {
        case Transform::kIdentity: break;
        case Transform::kRotate90: sr = rows - 1 - c; sc = r; break;
        case Transform::kRotate180: sr = rows - 1 - r; sc = cols - 1 - c; break;
        case Transform::kRotate270: sr = c; sc = cols - 1 - r; break;
        case Transform::kFlipHorizontal: sc = cols - 1 - c; break;
        case Transform::kFlipVertical: sr = rows - 1 - r; break;
        case Transform::kTranspose: sr = c; sc = r; break;
        case Transform::kAntiTranspose: sr = rows - 1 - c; sc = cols - 1 - r; break;
      }
      out.set(r, c, grid.at(sr, sc));
    }
  }
  return out;
}

namespace {

// 2x3 grid with distinct cells; its 8 images identify a transform uniquely.
const Grid& probe() {
  static const Grid g{{1, 2, 3}, {4, 5, 6}};
  return g;
}

Transform identify(const Grid& image) {
  for (Transform t : kDihedral) {
    if (apply(probe(), t) == image) return t;
  }
  return Transform::kIdentity;  // unreachable for dihedral images
}

}  // namespace

Transform inverse(Transform t) noexcept {
  switch (t) {
    case Transform::kRotate90: return Transform::kRotate270;
    case Transform::kRotate270: return Transform::kRotate90;
    default: return t;  // every other element is an involution
  }
}

Transform compose(Transform first, Transform second) noexcept {
  static const auto table = [] {
    std::array<std::array<Transform, 8>, 8> out{};
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        out[i][j] = identify(apply(apply(probe(), kDihedral[i]), kDihedral[j]));
      }
    }
    return out;
  }();
  return table[static_cast<std::size_t>(first)][static_cast<std::size_t>(second)];
}

bool fits_resize(const Grid& grid, int k) noexcept {
  return k >= 1 && static_cast<long long>(k) * std::max(grid.rows(), grid.cols()) <= Grid::kMaxSide;
}

Grid resize(const Grid& grid, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "resize scale must be >= 1");
  if (!fits_resize(grid, k)) {
    throw Error(ErrorCode::kResizeOverflow, "resize by " + std::to_string(k) + " exceeds 30 cells per side");
  }
  Grid out(grid.rows() * k, grid.cols() * k);
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) out.set(r, c, grid.at(r / k, c / k));
  }
  return out;
}

}  // namespace selfedit::fewshot
