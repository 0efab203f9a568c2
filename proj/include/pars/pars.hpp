#pragma once

#include "pars/accounting.hpp"
#include "pars/chat_client.hpp"
#include "pars/config.hpp"
#include "pars/error.hpp"
#include "pars/evaluation.hpp"
#include "pars/gates.hpp"
#include "pars/judge.hpp"
#include "pars/numeric.hpp"
#include "pars/pipeline.hpp"
#include "pars/prompt.hpp"
#include "pars/recipe.hpp"
#include "pars/remote_teacher.hpp"
#include "pars/rng.hpp"
#include "pars/sampler.hpp"
#include "pars/selectors.hpp"
#include "pars/teacher.hpp"
