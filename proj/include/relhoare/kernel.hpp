#pragma once

#include "relhoare/kernel/check.hpp"
#include "relhoare/kernel/convert.hpp"
#include "relhoare/kernel/explore.hpp"
#include "relhoare/kernel/judgment.hpp"
#include "relhoare/kernel/rules.hpp"
#include "relhoare/kernel/types.hpp"
