#pragma once

#include "sentinel/conversation.hpp"
#include "sentinel/corpus.hpp"
#include "sentinel/embedding.hpp"
#include "sentinel/error.hpp"
#include "sentinel/evaluation.hpp"
#include "sentinel/mimic.hpp"
#include "sentinel/remote.hpp"
#include "sentinel/scoring.hpp"
#include "sentinel/service.hpp"
#include "sentinel/session.hpp"
#include "sentinel/stats.hpp"
#include "sentinel/survey.hpp"
