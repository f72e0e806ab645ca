#pragma once

#include "cubeavg/bounds.hpp"
#include "cubeavg/cesaro.hpp"
#include "cubeavg/counterexamples.hpp"
#include "cubeavg/dynamics.hpp"
#include "cubeavg/fft.hpp"
#include "cubeavg/phase.hpp"
#include "cubeavg/recurrence.hpp"
#include "cubeavg/rng.hpp"
#include "cubeavg/wiener_wintner.hpp"
