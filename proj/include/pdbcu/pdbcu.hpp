#pragma once

// Everything in one include.

#include <pdbcu/async_engine.hpp>
#include <pdbcu/delay_simulator.hpp>
#include <pdbcu/generators.hpp>
#include <pdbcu/instance_io.hpp>
#include <pdbcu/libsvm.hpp>
#include <pdbcu/reference.hpp>
#include <pdbcu/serial_solver.hpp>
#include <pdbcu/verify.hpp>
