#pragma once

#include "giant/bp.hpp"
#include "giant/config.hpp"
#include "giant/coupling.hpp"
#include "giant/errors.hpp"
#include "giant/experiments.hpp"
#include "giant/gnp.hpp"
#include "giant/oracle.hpp"
#include "giant/parallel.hpp"
#include "giant/report.hpp"
#include "giant/rng.hpp"
#include "giant/stats.hpp"
