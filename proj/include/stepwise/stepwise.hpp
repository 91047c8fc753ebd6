#pragma once

#include "stepwise/corpus.hpp"
#include "stepwise/dag.hpp"
#include "stepwise/error.hpp"
#include "stepwise/explore.hpp"
#include "stepwise/external_prover.hpp"
#include "stepwise/line_channel.hpp"
#include "stepwise/pass_at_k.hpp"
#include "stepwise/policy.hpp"
#include "stepwise/postprocess.hpp"
#include "stepwise/prover.hpp"
#include "stepwise/remote_policy.hpp"
#include "stepwise/schedule.hpp"
#include "stepwise/scripted_policy.hpp"
#include "stepwise/search.hpp"
#include "stepwise/state.hpp"
#include "stepwise/text.hpp"
#include "stepwise/toy_policy.hpp"
#include "stepwise/toy_prover.hpp"
#include "stepwise/toy_term.hpp"
#include "stepwise/viz.hpp"
