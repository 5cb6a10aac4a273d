#pragma once

// Umbrella header: the whole perception-and-modelling library.

#include "orchard/camera.hpp"
#include "orchard/cloud.hpp"
#include "orchard/filter.hpp"
#include "orchard/frame.hpp"
#include "orchard/geometry.hpp"
#include "orchard/hough.hpp"
#include "orchard/image.hpp"
#include "orchard/mask_ops.hpp"
#include "orchard/metrics.hpp"
#include "orchard/occupancy.hpp"
#include "orchard/pipeline.hpp"
#include "orchard/png_io.hpp"
#include "orchard/pose.hpp"
#include "orchard/synth.hpp"
#include "orchard/verify.hpp"
#include "orchard/voxel.hpp"
