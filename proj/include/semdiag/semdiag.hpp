#pragma once

// Everything except the HTTP service (semdiag/service.hpp), which pulls in
// httplib and needs a threads library.

#include "semdiag/catms.hpp"
#include "semdiag/error.hpp"
#include "semdiag/gde.hpp"
#include "semdiag/kb.hpp"
#include "semdiag/model.hpp"
#include "semdiag/parse.hpp"
#include "semdiag/questions.hpp"
#include "semdiag/report.hpp"
#include "semdiag/session.hpp"
#include "semdiag/strategies.hpp"
#include "semdiag/suite.hpp"
