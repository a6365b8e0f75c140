#pragma once

// Soft segmentation toolkit: weak lesion annotations in, alpha-matte soft
// masks out, plus the label operators and metrics used around them.

#include "softseg/error.hpp"
#include "softseg/gmm.hpp"
#include "softseg/grabcut.hpp"
#include "softseg/image.hpp"
#include "softseg/image_io.hpp"
#include "softseg/labels.hpp"
#include "softseg/manifest.hpp"
#include "softseg/matting.hpp"
#include "softseg/max_flow.hpp"
#include "softseg/metrics.hpp"
#include "softseg/phantom.hpp"
#include "softseg/pipeline.hpp"
#include "softseg/trimap.hpp"
