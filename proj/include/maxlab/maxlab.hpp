#pragma once

// Finite-element laboratory for Poincare and Maxwell constants on simplicial
// meshes: mesh generation, P1/edge-element assembly, dense generalized
// eigensolves, discrete Helmholtz decompositions, and the constants reports.

#include "maxlab/assembly.hpp"
#include "maxlab/constants.hpp"
#include "maxlab/errors.hpp"
#include "maxlab/helmholtz.hpp"
#include "maxlab/material.hpp"
#include "maxlab/mesh.hpp"
#include "maxlab/runner.hpp"
#include "maxlab/spectral.hpp"
