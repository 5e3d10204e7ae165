"""
블라인드 스팟 툴킷 공통 예외

모든 앱이 이 모듈의 예외를 사용한다. 관리 명령은 예외 종류에 따라
종료 코드(2: 설정 오류, 3: 입출력 오류)를 결정한다.
"""


class CoverageError(Exception):
    """툴킷 예외의 최상위 클래스"""


class ContractViolation(CoverageError, ValueError):
    """
    계약 위반 - 좌표계/타임스텝 불일치, 차원 불일치, 잘못된 도메인 값
    """


class NumericError(CoverageError, ArithmeticError):
    """수치 계산 실패 (예: 역왜곡 반복이 수렴하지 않음)"""

    def __init__(self, message, pixel=None):
        self.pixel = pixel
        if pixel is not None:
            message = f"{message} (픽셀 {pixel})"
        super().__init__(message)


class ScenarioError(CoverageError):
    """시나리오 구성 오류 (궤적 누락, ego 차량 개수 등)"""


class ConfigError(CoverageError):
    """
    시나리오 설정 파싱/검증 오류

    field는 점으로 구분된 필드 경로, line/column은 JSON 문법 오류 위치.
    """

    def __init__(self, message, field=None, line=None, column=None):
        self.field = field
        self.line = line
        self.column = column
        location = []
        if field:
            location.append(f"필드 {field}")
        if line is not None:
            location.append(f"{line}행 {column}열")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)


class ParseError(CoverageError):
    """포인트 클라우드·메시 파일 파싱 오류 (offset: 행 번호 또는 바이트 오프셋)"""

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        super().__init__(f"{path}: 오프셋 {offset}: {message}")


class ArtifactIOError(CoverageError, OSError):
    """파일 읽기/쓰기 실패, 메시 파일 누락"""
