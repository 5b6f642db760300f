// lipr: umbrella header.
#pragma once

#include "lipr/bow.hpp"
#include "lipr/config.hpp"
#include "lipr/database.hpp"
#include "lipr/descriptor.hpp"
#include "lipr/eval.hpp"
#include "lipr/fast.hpp"
#include "lipr/geometry.hpp"
#include "lipr/image.hpp"
#include "lipr/matching.hpp"
#include "lipr/orb.hpp"
#include "lipr/pipeline.hpp"
#include "lipr/pose.hpp"
#include "lipr/projection.hpp"
#include "lipr/pyramid.hpp"
#include "lipr/scan.hpp"
#include "lipr/scan_io.hpp"
#include "lipr/synth.hpp"
