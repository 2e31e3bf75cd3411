#pragma once

#include "sepbn/cpt.hpp"
#include "sepbn/errors.hpp"
#include "sepbn/influence.hpp"
#include "sepbn/json_io.hpp"
#include "sepbn/linalg.hpp"
#include "sepbn/pmf.hpp"
#include "sepbn/rng.hpp"
#include "sepbn/separability.hpp"
#include "sepbn/variable_set.hpp"
