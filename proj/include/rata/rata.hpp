#pragma once

#include <rata/analysis.hpp>
#include <rata/common.hpp>
#include <rata/config.hpp>
#include <rata/crypto.hpp>
#include <rata/game.hpp>
#include <rata/ltl.hpp>
#include <rata/memory.hpp>
#include <rata/monitor.hpp>
#include <rata/protocol.hpp>
#include <rata/prover.hpp>
#include <rata/scenario.hpp>
#include <rata/swarm.hpp>
#include <rata/trace.hpp>
