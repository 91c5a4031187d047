#pragma once

#include "mgrid/config.hpp"
#include "mgrid/domain.hpp"
#include "mgrid/environment.hpp"
#include "mgrid/errors.hpp"
#include "mgrid/experiment.hpp"
#include "mgrid/learner.hpp"
#include "mgrid/market.hpp"
#include "mgrid/oracle.hpp"
#include "mgrid/oracle_check.hpp"
#include "mgrid/processes.hpp"
#include "mgrid/random.hpp"
#include "mgrid/report.hpp"
#include "mgrid/table1.hpp"
