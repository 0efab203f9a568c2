#pragma once

#include "pars/pipeline/curate.hpp"
#include "pars/pipeline/records.hpp"
#include "pars/pipeline/report.hpp"
#include "pars/pipeline/run_config.hpp"
#include "pars/pipeline/simulate.hpp"
#include "pars/pipeline/strategies.hpp"
