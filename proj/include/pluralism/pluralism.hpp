#pragma once

#include "pluralism/analytics.hpp"
#include "pluralism/annotation.hpp"
#include "pluralism/artifact.hpp"
#include "pluralism/calibration.hpp"
#include "pluralism/case_io.hpp"
#include "pluralism/case_model.hpp"
#include "pluralism/context_encoder.hpp"
#include "pluralism/embedding.hpp"
#include "pluralism/fusion.hpp"
#include "pluralism/normative.hpp"
#include "pluralism/pipeline.hpp"
#include "pluralism/projection.hpp"
#include "pluralism/run_config.hpp"
#include "pluralism/stack.hpp"
#include "pluralism/synthetic.hpp"
#include "pluralism/taxonomy.hpp"
