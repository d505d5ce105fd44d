#pragma once

#include "rclab/error.hpp"
#include "rclab/grid.hpp"
#include "rclab/regularization.hpp"
#include "rclab/state.hpp"
#include "rclab/diagnostics.hpp"
#include "rclab/trajectory.hpp"
#include "rclab/dynamics.hpp"
#include "rclab/oracle.hpp"
#include "rclab/scenario.hpp"
#include "rclab/weakform.hpp"
#include "rclab/experiments.hpp"
#include "rclab/io/csv.hpp"
#include "rclab/io/snapshot.hpp"
#include "rclab/io/config.hpp"
#include "rclab/io/manifest.hpp"
