#ifndef JDM_JDM_HPP
#define JDM_JDM_HPP

#include "jdm/diagnostics.hpp"
#include "jdm/distributions.hpp"
#include "jdm/draws.hpp"
#include "jdm/errors.hpp"
#include "jdm/io.hpp"
#include "jdm/longitudinal.hpp"
#include "jdm/model.hpp"
#include "jdm/posterior.hpp"
#include "jdm/quadrature.hpp"
#include "jdm/sampler.hpp"
#include "jdm/simulator.hpp"
#include "jdm/spec_config.hpp"
#include "jdm/spline_basis.hpp"
#include "jdm/survival.hpp"
#include "jdm/waic.hpp"

#endif  // JDM_JDM_HPP
