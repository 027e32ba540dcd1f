#pragma once

#include <array>
#include <string_view>

#include "selfedit/core/grid.hpp"

namespace selfedit::fewshot {

/// The dihedral group of the square. Rotations are clockwise.
enum class Transform {
  kIdentity,
  kRotate90,
  kRotate180,
  kRotate270,
  kFlipHorizontal,  // mirrors columns
  kFlipVertical,    // mirrors rows
  kTranspose,
  kAntiTranspose,
};

/// "reflect" in tool descriptions is the horizontal flip.
inline constexpr Transform kReflect = Transform::kFlipHorizontal;

inline constexpr std::array<Transform, 8> kDihedral = {
    Transform::kIdentity,       Transform::kRotate90,     Transform::kRotate180, Transform::kRotate270,
    Transform::kFlipHorizontal, Transform::kFlipVertical, Transform::kTranspose, Transform::kAntiTranspose,
};

std::string_view to_string(Transform t) noexcept;

[[nodiscard]] Grid apply(const Grid& grid, Transform t);

[[nodiscard]] Transform inverse(Transform t) noexcept;

/// The transform equal to applying `first` then `second`.
[[nodiscard]] Transform compose(Transform first, Transform second) noexcept;

/// Replicates each cell into a k x k block. Throws Error(kResizeOverflow) when
/// k * max(rows, cols) > 30 and Error(kInvalidArgument) when k < 1.
[[nodiscard]] Grid resize(const Grid& grid, int k);

[[nodiscard]] bool fits_resize(const Grid& grid, int k) noexcept;

}  // namespace selfedit::fewshot
