#pragma once

#include "nntopo/error.hpp"
#include "nntopo/tensor.hpp"
#include "nntopo/dataset.hpp"
#include "nntopo/nn.hpp"
#include "nntopo/data.hpp"
#include "nntopo/graph.hpp"
#include "nntopo/persistence.hpp"
#include "nntopo/assignment.hpp"
#include "nntopo/diagram.hpp"
#include "nntopo/subgraph.hpp"
#include "nntopo/svm.hpp"
#include "nntopo/attacks.hpp"
#include "nntopo/bundle.hpp"
#include "nntopo/stats.hpp"
