#pragma once

#include "rkranks/error.hpp"
#include "rkranks/eval.hpp"
#include "rkranks/oracle.hpp"
#include "rkranks/query.hpp"
#include "rkranks/ranktable.hpp"
#include "rkranks/vecdata.hpp"
