#pragma once

// Umbrella header: barrier chains, gain composition algebra, the scalar
// comparison lemma, the fixed-step simulator and the pendulum benchmark.

#include <safegain/barrier_chain.hpp>
#include <safegain/cli.hpp>
#include <safegain/comparison.hpp>
#include <safegain/config.hpp>
#include <safegain/errors.hpp>
#include <safegain/gain_algebra.hpp>
#include <safegain/gains.hpp>
#include <safegain/pendulum.hpp>
#include <safegain/report.hpp>
#include <safegain/simulator.hpp>
#include <safegain/suites.hpp>
