#pragma once

#include "hkge/checkpoint.hpp"
#include "hkge/config.hpp"
#include "hkge/data.hpp"
#include "hkge/error.hpp"
#include "hkge/eval.hpp"
#include "hkge/geometry.hpp"
#include "hkge/hierarchy.hpp"
#include "hkge/model.hpp"
#include "hkge/random.hpp"
#include "hkge/synthetic.hpp"
#include "hkge/training.hpp"
