import logging
import os
import unittest
from unittest.mock import patch

from cvqed.common.constants import ENV_LOG_LEVEL
from cvqed.common.logging import get_logger


class TestGetLogger(unittest.TestCase):

    def test_level_from_environment(self):
        with patch.dict(os.environ, {ENV_LOG_LEVEL: "debug"}):
            logger = get_logger("cvqed.test.level_from_environment")
        self.assertEqual(logger.level, logging.DEBUG)

    def test_default_level(self):
        with patch.dict(os.environ, {}, clear=True):
            logger = get_logger("cvqed.test.default_level")
        self.assertEqual(logger.level, logging.INFO)

    def test_single_handler(self):
        get_logger("cvqed.test.single_handler")
        logger = get_logger("cvqed.test.single_handler")
        self.assertEqual(len(logger.handlers), 1)
        self.assertFalse(logger.propagate)


if __name__ == "__main__":
    unittest.main()
