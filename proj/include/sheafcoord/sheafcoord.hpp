#pragma once

#include "sheafcoord/admm.hpp"
#include "sheafcoord/cochain.hpp"
#include "sheafcoord/cohomology.hpp"
#include "sheafcoord/convex.hpp"
#include "sheafcoord/distsim.hpp"
#include "sheafcoord/dynamics.hpp"
#include "sheafcoord/graph.hpp"
#include "sheafcoord/homprog.hpp"
#include "sheafcoord/linear_map.hpp"
#include "sheafcoord/operators.hpp"
#include "sheafcoord/scenario.hpp"
#include "sheafcoord/sheaf.hpp"
#include "sheafcoord/trace_io.hpp"
