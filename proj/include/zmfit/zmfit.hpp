#pragma once

#include "zmfit/corpus.hpp"
#include "zmfit/distributions.hpp"
#include "zmfit/error.hpp"
#include "zmfit/fitting.hpp"
#include "zmfit/report.hpp"
#include "zmfit/sanitizer.hpp"
#include "zmfit/specfun.hpp"
#include "zmfit/version.hpp"
