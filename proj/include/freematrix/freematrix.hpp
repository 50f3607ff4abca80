#pragma once

#include "freematrix/bounds.hpp"
#include "freematrix/dyson.hpp"
#include "freematrix/ensemble.hpp"
#include "freematrix/ensembles.hpp"
#include "freematrix/errors.hpp"
#include "freematrix/json_io.hpp"
#include "freematrix/lehner.hpp"
#include "freematrix/linalg.hpp"
#include "freematrix/moments.hpp"
#include "freematrix/montecarlo.hpp"
#include "freematrix/pairings.hpp"
#include "freematrix/params.hpp"
#include "freematrix/rng.hpp"
