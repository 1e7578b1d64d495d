#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "toolpose/heatmap.hpp"
#include "toolpose/image.hpp"

namespace toolpose {

struct SceneSpec {
  FrameSize frame{256, 320};
  SkeletonSpec skeleton = SkeletonSpec::endovis();
  std::size_t instruments = 2;
  // Every pair of joints in the scene, across instruments, is at least this far apart.
  double min_separation = 80.0;
  // Joints keep this distance from the frame border.
  double margin = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Random instruments laid out along the skeleton's edges with integer joint
// coordinates. Deterministic per seed; throws InvalidInput when the spacing
// constraints cannot be met.
std::vector<InstrumentAnnotation> generate_scene(const SceneSpec& spec);

// Dark background with each edge drawn as a thick bar and joints as discs.
Image draw_scene(std::span<const InstrumentAnnotation> instruments, const SkeletonSpec& skeleton,
                 FrameSize frame);

}  // namespace toolpose
