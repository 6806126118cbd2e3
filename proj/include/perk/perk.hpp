#pragma once

#include "perk/error.hpp"
#include "perk/linalg.hpp"
#include "perk/text_io.hpp"
#include "perk/spectra.hpp"
#include "perk/tableau.hpp"
#include "perk/stabpoly.hpp"
#include "perk/butcher.hpp"
#include "perk/socp.hpp"
#include "perk/optimizer.hpp"
#include "perk/integrator.hpp"
#include "perk/problems.hpp"
#include "perk/harness.hpp"
