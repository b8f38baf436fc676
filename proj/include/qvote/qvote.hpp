#pragma once

#include "qvote/crypto.hpp"
#include "qvote/encoding.hpp"
#include "qvote/error.hpp"
#include "qvote/grover.hpp"
#include "qvote/ledger.hpp"
#include "qvote/protocol.hpp"
#include "qvote/qsim.hpp"
#include "qvote/rng.hpp"
#include "qvote/runner.hpp"
