#ifndef SKD_SKETCHDECOMP_HPP
#define SKD_SKETCHDECOMP_HPP

#include "skd/coherence.hpp"
#include "skd/datagen.hpp"
#include "skd/errors.hpp"
#include "skd/experiments.hpp"
#include "skd/io.hpp"
#include "skd/matrix.hpp"
#include "skd/parallel.hpp"
#include "skd/pipelines.hpp"
#include "skd/rng.hpp"
#include "skd/sampling.hpp"
#include "skd/solvers.hpp"

#endif  // SKD_SKETCHDECOMP_HPP
