import logging

from django.core.management.base import BaseCommand, CommandError

from apps.geometry.exceptions import (
    ArtifactIOError,
    ConfigError,
    ContractViolation,
    NumericError,
    ParseError,
    ScenarioError,
)

logger = logging.getLogger(__name__)

CONFIG_ERROR_CODE = 2
IO_ERROR_CODE = 3


class CoverageCommand(BaseCommand):
    """
    툴킷 관리 명령 공통 베이스 - 예외 종류를 종료 코드로 바꾼다

    설정/시나리오/계약 오류 → 2, 파일 입출력/파싱 오류 → 3
    """

    def handle(self, *args, **options):
        try:
            return self.run_command(*args, **options)
        except (ConfigError, ScenarioError, ContractViolation, NumericError) as e:
            logger.warning("command failed kind=config error=%s", e)
            raise CommandError(str(e), returncode=CONFIG_ERROR_CODE) from e
        except (ArtifactIOError, ParseError) as e:
            logger.warning("command failed kind=io error=%s", e)
            raise CommandError(str(e), returncode=IO_ERROR_CODE) from e

    def run_command(self, *args, **options):
        raise NotImplementedError
