#pragma once

#include "chance_lab/errors.hpp"
#include "chance_lab/rational.hpp"
#include "chance_lab/measures.hpp"
#include "chance_lab/confirmation.hpp"
#include "chance_lab/polynomial.hpp"
#include "chance_lab/scales.hpp"
#include "chance_lab/procedures.hpp"
#include "chance_lab/json_io.hpp"
#include "chance_lab/experiment.hpp"
