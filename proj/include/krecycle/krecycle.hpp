#pragma once

// Umbrella header.

#include "krecycle/sparsela.hpp"
#include "krecycle/krylov.hpp"
#include "krecycle/precond.hpp"
#include "krecycle/recycle.hpp"
#include "krecycle/svdwindow.hpp"
#include "krecycle/convdiff.hpp"
#include "krecycle/sequence.hpp"
#include "krecycle/costmodel.hpp"
#include "krecycle/io.hpp"
