#pragma once

#include "adapters.hpp"
#include "compile.hpp"
#include "core.hpp"
#include "corpus.hpp"
#include "darboux.hpp"
#include "errors.hpp"
#include "expr.hpp"
#include "oracle.hpp"
#include "piecewise.hpp"
#include "stieltjes_map.hpp"
#include "substitution.hpp"
