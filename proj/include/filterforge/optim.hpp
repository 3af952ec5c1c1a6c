#pragma once

#include "filterforge/optim/bfgs.hpp"
#include "filterforge/optim/box.hpp"
#include "filterforge/optim/line_search.hpp"
#include "filterforge/optim/nelder_mead.hpp"
#include "filterforge/optim/shape.hpp"
#include "filterforge/optim/types.hpp"
