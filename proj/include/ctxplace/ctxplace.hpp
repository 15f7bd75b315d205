#pragma once

#include "common.hpp"
#include "scene.hpp"
#include "scene_io.hpp"
#include "geometry.hpp"
#include "energy.hpp"
#include "optimizer.hpp"
#include "drawing.hpp"
#include "vac.hpp"
#include "task.hpp"
#include "judge.hpp"
#include "vlm.hpp"
#include "pipeline.hpp"
#include "evaluation.hpp"
