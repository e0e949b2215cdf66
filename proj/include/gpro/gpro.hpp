#pragma once

// Umbrella header for the whole library.

#include "gpro/attention.hpp"
#include "gpro/checkpoint.hpp"
#include "gpro/cli.hpp"
#include "gpro/common.hpp"
#include "gpro/config.hpp"
#include "gpro/counterfactual.hpp"
#include "gpro/dataset_io.hpp"
#include "gpro/generator.hpp"
#include "gpro/gnn.hpp"
#include "gpro/graph.hpp"
#include "gpro/losses.hpp"
#include "gpro/matrix.hpp"
#include "gpro/model.hpp"
#include "gpro/ops.hpp"
#include "gpro/optim.hpp"
#include "gpro/tower.hpp"
#include "gpro/trainer.hpp"
#include "gpro/value.hpp"
