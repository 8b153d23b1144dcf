#pragma once

// Loss-based objective priors for continuous parameter spaces by
// neighbourhood exclusion: exact delta-worth via constrained KL
// minimization, the asymptotic min-eigenvalue prior, Jeffreys/volume
// aggregation, and the scenario verification suite.

#include "lossprior/axes.hpp"
#include "lossprior/errors.hpp"
#include "lossprior/fisher.hpp"
#include "lossprior/geometry.hpp"
#include "lossprior/io.hpp"
#include "lossprior/model.hpp"
#include "lossprior/param.hpp"
#include "lossprior/priors.hpp"
#include "lossprior/quadrature.hpp"
#include "lossprior/rng.hpp"
#include "lossprior/scenarios.hpp"
#include "lossprior/spd.hpp"
#include "lossprior/validate.hpp"
#include "lossprior/worth.hpp"
