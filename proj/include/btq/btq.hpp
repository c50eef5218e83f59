#pragma once

#include "btq/asymptotics.hpp"
#include "btq/functions.hpp"
#include "btq/geometry.hpp"
#include "btq/hilbert.hpp"
#include "btq/operator_matrix.hpp"
#include "btq/operators.hpp"
#include "btq/parallel.hpp"
#include "btq/quadrature.hpp"
#include "btq/report.hpp"
#include "btq/symbols.hpp"
#include "btq/verify.hpp"
