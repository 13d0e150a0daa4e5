#pragma once

// Core task engine: skills, compositions, Countdown, verification, datasets
// and evaluation. The HTTP pieces (gateway.hpp, service.hpp) pull in
// cpp-httplib and are included separately.

#include "compskill/composition.hpp"
#include "compskill/countdown.hpp"
#include "compskill/dataset.hpp"
#include "compskill/errors.hpp"
#include "compskill/eval.hpp"
#include "compskill/model.hpp"
#include "compskill/problem.hpp"
#include "compskill/rational.hpp"
#include "compskill/rng.hpp"
#include "compskill/skills.hpp"
#include "compskill/verification.hpp"
