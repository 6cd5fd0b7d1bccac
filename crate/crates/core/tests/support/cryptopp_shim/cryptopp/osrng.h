#pragma once
#include "integer.h"
