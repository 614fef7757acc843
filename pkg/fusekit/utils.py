#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

import logging
import logging.config as lc
import os
from pathlib import Path
from typing import Union, Dict

from yaml import safe_load


class LogMessage(object):
    def __init__(self, fmt, args):
        self.fmt = fmt
        self.args = args

    def __str__(self):
        return self.fmt.format(*self.args)


class Logger(logging.LoggerAdapter):
    def __init__(self, logger, extra=None):
        super().__init__(logger, extra or {})

    def log(self, level, msg, *args, **kwargs):
        if self.isEnabledFor(level):
            msg, kwargs = self.process(msg, kwargs)
            self.logger._log(level, LogMessage(msg, args), (), **kwargs)


class LogHelper:

    ROOT_LOGGER:str = "fusekit"

    __logger:Logger = None

    @staticmethod
    def __initialize():
        logging.raiseExceptions = True

        path:str = os.path.abspath(os.path.dirname(__file__))
        file:str = os.path.join(path, "config/logging.conf")

        config_file:Path = Path(file)
        if config_file.exists() and config_file.is_file():
            with config_file.open("r") as conf_stream:
                conf = safe_load(conf_stream)
            lc.dictConfig(conf)
            LogHelper.__logger = Logger(logging.getLogger(LogHelper.ROOT_LOGGER))
            logger = LogHelper.logger("Logger")
            logger.debug("Logger initialize from default configuration, {0}", file)
        else:
            LogHelper.__fallback_initialize()

    @staticmethod
    def __fallback_initialize():
        logging.basicConfig(format="{asctime} [{levelname}] [{name}] {message}",
            style="{", level=logging.WARNING)
        LogHelper.__logger = Logger(logging.getLogger(LogHelper.ROOT_LOGGER))
        logger = LogHelper.logger("Logger")
        logger.info("Could not find default logger configuration file, using fallback config.")

    @staticmethod
    def logger(name:str) -> Logger:
        if LogHelper.__logger is None:
            LogHelper.__initialize()

        return Logger(logging.getLogger(LogHelper.ROOT_LOGGER).getChild(name))

    @staticmethod
    def set_level(level:int):
        """Change the level of the root fusekit logger, used by the command line's --verbose"""
        if LogHelper.__logger is None:
            LogHelper.__initialize()

        logging.getLogger(LogHelper.ROOT_LOGGER).setLevel(level)


class FusekitProperties:

    __LOG:Logger = LogHelper.logger("FusekitProperties")
    __properties = None

    def __init__(self):
        self.__prop_map:Dict[str, Union[str, int, float, bool]] = dict()
        self.__load_properties()

    def __load_properties(self, file_name:str=None):
        file:str = file_name
        if file_name is None:
            path:str = os.path.abspath(os.path.dirname(__file__))
            file = os.path.join(path, "config/fusekit.properties")

        config_file:Path = Path(file)
        if config_file.exists() and config_file.is_file():
            FusekitProperties.__LOG.debug("Loading configuration properties from {0}", config_file)

            with config_file.open() as properties_file:
                for line in properties_file:
                    line = line.strip()
                    # ignore # as a comment
                    if not line.startswith("#") and len(line) > 0:
                        nv_pair = line.split("=")
                        if len(nv_pair) == 2:
                            name:str = nv_pair[0].strip()
                            value = FusekitProperties.__get_typed_value(nv_pair[1].strip())
                            self.__prop_map[name] = value
                            FusekitProperties.__LOG.debug("name: {0}, value: {1}", name, value)
                        else:
                            FusekitProperties.__LOG.warning("Ignore malformed line [{0}] in file {1}",
                                line, file)
        else:
            FusekitProperties.__LOG.error("Failed to load configuration file {0}, exists {1}, is file {2}",
                file, config_file.exists(), config_file.is_file())

    def __get_property_value(self, name:str) -> Union[str, int, float, bool]:
        return self.__prop_map.get(name)

    @staticmethod
    def __get_typed_value(value:str) -> Union[str, int, float, bool]:
        if value == "True":
            return True
        elif value == "False":
            return False

        try:
            return int(value)
        except ValueError:
            pass

        try:
            return float(value)
        except ValueError:
            return value

    @staticmethod
    def __get_instance():
        if FusekitProperties.__properties is None:
            FusekitProperties.__properties = FusekitProperties()

        return FusekitProperties.__properties

    @staticmethod
    def get_property(name:str, default:Union[str, int, float, bool]=None) -> Union[str, int, float, bool]:
        result = FusekitProperties.__get_instance().__get_property_value(name)
        if result is None:
            return default
        else:
            return result

    @staticmethod
    def add_properties(file_name:str):
        """Add properties in addition to the default properties over writing any duplicates"""
        FusekitProperties.__get_instance().__load_properties(file_name)
