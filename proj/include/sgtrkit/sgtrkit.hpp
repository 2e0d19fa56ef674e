#pragma once

#include "sgtrkit/error.hpp"
#include "sgtrkit/matrix.hpp"
#include "sgtrkit/prob.hpp"
#include "sgtrkit/geometry.hpp"
#include "sgtrkit/nodes.hpp"
#include "sgtrkit/decoder.hpp"
#include "sgtrkit/assembler.hpp"
#include "sgtrkit/matcher.hpp"
#include "sgtrkit/losses.hpp"
#include "sgtrkit/metrics.hpp"
#include "sgtrkit/scene.hpp"
#include "sgtrkit/io.hpp"
#include "sgtrkit/synthetic.hpp"
