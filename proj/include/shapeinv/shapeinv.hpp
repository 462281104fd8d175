#pragma once

// Everything in one include.
#include "density.hpp"
#include "distance.hpp"
#include "experiments.hpp"
#include "fano.hpp"
#include "fft.hpp"
#include "fourier.hpp"
#include "identifiability.hpp"
#include "io.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "posterior.hpp"
#include "prior.hpp"
