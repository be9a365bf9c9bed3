#pragma once

#include "sppm/duality.hpp"
#include "sppm/error.hpp"
#include "sppm/exact.hpp"
#include "sppm/fit.hpp"
#include "sppm/hubbard.hpp"
#include "sppm/io.hpp"
#include "sppm/ising.hpp"
#include "sppm/laplacian.hpp"
#include "sppm/matrix.hpp"
#include "sppm/meanfield.hpp"
#include "sppm/parallel.hpp"
