#pragma once

#include <cstddef>
#include <vector>

#include "fuselab/image.hpp"
#include "fuselab/rng.hpp"

namespace fuselab {

// Composite RGB degradation: brightness scaling, Gaussian blur, additive
// Gaussian noise, applied in that order with round-and-clamp after each stage.

struct DegradationLevel {
  int level = 0;
  double gamma = 1.0;     // brightness factor
  int kernel = 1;         // blur kernel size, odd
  double sigma_noise = 0.0;
};

// The eleven discrete levels, 0 (no modification) through 10.
std::vector<DegradationLevel> default_degradation_levels();

struct DegradeOptions {
  bool apply_noise = true;
};

Image8 degrade(const Image8& img, const DegradationLevel& level, Rng& rng,
               const DegradeOptions& options = {});

// Separable k x k Gaussian, sigma = 0.3*((k-1)/2 - 1) + 0.8, reflect-padded
// (edge pixel included in the mirror). Float through both passes, rounded
// once at the end. k = 1 is the identity.
Image8 gaussian_blur(const Image8& img, int k);

struct OccupancyResult {
  double r = 0.0;
  int threshold = 0;
  bool degenerate = false;
};

// Otsu foreground occupancy inside a box: 256-bin histogram of the crop,
// smallest threshold maximizing between-class variance, pixels strictly
// above it count as foreground. A constant crop is degenerate with r = 0.
OccupancyResult otsu_occupancy(const Image8& ir, const BoxAnnotation& box);

struct SceneSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t objects = 2;
  std::size_t min_size = 8;
  std::size_t max_size = 24;
  int ir_background = 0;
  int ir_foreground = 255;
};

struct SynthScene {
  Image8 rgb;
  Image8 ir;
  std::vector<BoxAnnotation> boxes;
};

// Constant hot rectangles on a cold IR background, textured counterparts in
// RGB, exact box annotations. Deterministic for a given generator state.
SynthScene synth_scene(Rng& rng, const SceneSpec& spec);

}  // namespace fuselab
