#pragma once

// Umbrella header.

#include "nullnet/convnull.hpp"
#include "nullnet/data_io.hpp"
#include "nullnet/linalg.hpp"
#include "nullnet/network.hpp"
#include "nullnet/nullspace.hpp"
#include "nullnet/rng.hpp"
#include "nullnet/stego.hpp"
